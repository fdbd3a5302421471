fn main() {
    std::process::exit(sb_kit::cli::main_with_args(std::env::args_os()));
}
