fn main() {
    std::process::exit(greedycd::harness::cli_main(std::env::args_os()));
}
