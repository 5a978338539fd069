fn main() {
    std::process::exit(hats::cli::main());
}
