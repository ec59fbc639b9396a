fn main() {
    std::process::exit(voltcast::cli::main_with_args(std::env::args_os()));
}
