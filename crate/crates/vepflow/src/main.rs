fn main() {
    std::process::exit(vepflow::cli::main_with_args(std::env::args_os()));
}
