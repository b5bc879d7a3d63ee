fn main() {
    std::process::exit(fgan_cd::cli::main_with_args(std::env::args_os()));
}
