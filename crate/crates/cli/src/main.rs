fn main() {
    std::process::exit(mmfs_cli::run());
}
