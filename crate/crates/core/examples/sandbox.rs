// Run a small Python program under step, output and size limits.

use codegen::sandbox::{run_code, ExecutionStatus, ResourceLimits};

const PROGRAM: &str = "\
def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a

values = []
for i in range(8):
    values.append(fib(i))
print(values)
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let limits = ResourceLimits::default();
    let result = run_code(PROGRAM, &limits);
    println!("{}", serde_json::to_string_pretty(&result)?);
    assert_eq!(result.status, ExecutionStatus::Ok);
    assert_eq!(result.stdout, "[0, 1, 1, 2, 3, 5, 8, 13]\n");
    assert_eq!(result.bindings["values"], "[0, 1, 1, 2, 3, 5, 8, 13]");

    // A runaway loop hits the step budget instead of hanging.
    let tight = ResourceLimits { max_steps: 1_000, ..limits };
    let spin = run_code("while True:\n    pass\n", &tight);
    println!("infinite loop -> {:?} {:?}", spin.status, spin.error.as_ref().map(|e| &e.kind));
    assert_eq!(spin.status, ExecutionStatus::LimitExceeded);

    // Imports are outside the supported subset.
    let blocked = run_code("import os\n", &limits);
    assert_eq!(blocked.error.map(|e| e.kind).as_deref(), Some("UnsupportedConstruct"));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
