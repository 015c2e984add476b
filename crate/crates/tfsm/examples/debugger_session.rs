//! Drives the debugger with a fixed script instead of standard input.

use tfsm::compiler::codegen::compile_grammar;
use tfsm::compiler::load_grammar;
use tfsm::debugger::Debugger;
use tfsm::machine::Machine;

const SCRIPT: &[&str] = &["break L1", "run", "regs", "chart 0 1", "stack", "step 5", "trail", "run"];

fn main() {
    let g = load_grammar(include_str!("../corpus/running.ale")).expect("grammar loads");
    let code = compile_grammar(&g).expect("grammar compiles");
    let mut d = Debugger::new(Machine::new(&code, &["x", "y"]).expect("words are known"));
    for line in SCRIPT {
        println!("(tfsm) {line}");
        let reply = d.command(line);
        if !reply.text.is_empty() {
            println!("{}", reply.text.trim_end());
        }
    }
}
