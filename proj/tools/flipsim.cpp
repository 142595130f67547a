#include "flip/flip.hpp"
int main() { return 0; }
