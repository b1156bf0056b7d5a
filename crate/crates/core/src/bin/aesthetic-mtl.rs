fn main() -> std::process::ExitCode {
    aesthetic_mtl::cli::main()
}
