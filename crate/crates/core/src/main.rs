fn main() {
    std::process::exit(goc_edge::cli::main());
}
