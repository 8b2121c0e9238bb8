fn main() {
    std::process::exit(seqspec_cli::run());
}
