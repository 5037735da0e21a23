#include "lis/cli.hpp"

int main(int argc, char** argv)
{
    return lis::cli::run(argc, argv);
}
