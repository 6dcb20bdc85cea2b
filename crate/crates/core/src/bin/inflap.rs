fn main() {
    std::process::exit(inflap::cli::main_with_args(std::env::args_os()));
}
