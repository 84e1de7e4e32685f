fn main() {
    std::process::exit(logcoint::cli::main_with_args(std::env::args_os()));
}
