fn main() {
    std::process::exit(mfat_cli::run(std::env::args_os()));
}
