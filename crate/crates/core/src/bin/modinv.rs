fn main() {
    std::process::exit(modinv::cli::main_with_args(std::env::args_os()));
}
