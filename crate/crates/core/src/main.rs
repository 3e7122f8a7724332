fn main() {
    std::process::exit(biphoton::pipeline::cli::run(std::env::args_os()));
}
