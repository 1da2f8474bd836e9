fn main() {
    std::process::exit(hubspoke::cli::main_with(std::env::args_os()));
}
