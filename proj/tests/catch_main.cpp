// Catch2 v3 amalgamated implementation; it supplies main().
#include <catch2/catch_amalgamated.cpp>
