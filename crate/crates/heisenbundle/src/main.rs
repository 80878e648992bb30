fn main() {
    std::process::exit(heisenbundle::cli_main());
}
