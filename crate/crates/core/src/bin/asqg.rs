fn main() {
    std::process::exit(asqg_core::cli::main_with_args(std::env::args_os()));
}
