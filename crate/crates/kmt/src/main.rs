/// Normalization recurses on term structure; the default main stack is too small.
const STACK: usize = 512 << 20;

fn main() {
    let code = std::thread::Builder::new()
        .stack_size(STACK)
        .spawn(kmt::frontend::cli::run)
        .expect("spawn main thread")
        .join()
        .unwrap_or(kmt::frontend::cli::EXIT_SOLVER);
    std::process::exit(code);
}
