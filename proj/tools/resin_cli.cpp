#include <iostream>

int main() {
    std::cerr << "resin: no subcommand\n";
    return 2;
}
