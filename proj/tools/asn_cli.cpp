#include "asn/cli.hpp"

int main(int argc, char** argv) { return asn::cli::run(argc, argv); }
