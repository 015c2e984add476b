//! Compiles a grammar to object code, disassembles it and checks that the
//! textual object format reads back to the same program.

use tfsm::code::ObjectCode;
use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::load_grammar;

fn main() {
    let g = load_grammar(include_str!("../corpus/example.ale")).expect("grammar loads");
    let code = compile_grammar(&g).expect("grammar compiles");
    print!("{}", code.disassemble());

    let text = code.to_text();
    let back = ObjectCode::from_text(&text).expect("object text reads back");
    println!(
        "\n{} instructions, {} lexical entries, object file of {} bytes, round trip {}",
        code.program.len(),
        code.lexicon.values().count(),
        text.len(),
        if back.to_text() == text { "exact" } else { "DIFFERENT" }
    );
}
