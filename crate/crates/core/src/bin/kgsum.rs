fn main() {
    std::process::exit(kgsum::cli::run(std::env::args_os()));
}
