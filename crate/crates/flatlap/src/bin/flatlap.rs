fn main() {
    std::process::exit(flatlap::cli::main_with_args(std::env::args_os()));
}
