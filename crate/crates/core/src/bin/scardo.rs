fn main() {
    std::process::exit(scardo::cli::cli_main(std::env::args_os()));
}
