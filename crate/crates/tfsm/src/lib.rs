pub mod afs;
pub mod code;
pub mod compiler;
pub mod debugger;
pub mod goals;
pub mod machine;
pub mod oracle;
pub mod render;
pub mod term;
pub mod tfs;
pub mod types;
