fn main() {
    std::process::exit(hyperafw::cli::main(std::env::args_os()));
}
