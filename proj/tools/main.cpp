#include "puccilab/harness.hpp"

int main(int argc, char** argv) { return puccilab::cliMain(argc, argv); }
