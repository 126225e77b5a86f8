#include "textvae/cli.hpp"

int main(int argc, char** argv) { return textvae::run_cli(argc, argv); }
