fn main() {
    std::process::exit(confbandit::cli::main_with_args(std::env::args_os()));
}
