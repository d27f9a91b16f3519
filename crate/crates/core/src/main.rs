fn main() {
    std::process::exit(roughcorr::cli::main_with_args(std::env::args_os()));
}
