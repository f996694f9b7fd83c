fn main() {
    std::process::exit(urbanvae::cli::run(std::env::args_os()));
}
