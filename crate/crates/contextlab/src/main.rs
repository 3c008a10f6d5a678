fn main() {
    std::process::exit(contextlab::cli::main_entry(std::env::args_os()));
}
