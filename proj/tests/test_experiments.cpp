#include "flip/experiments/scenario.hpp"
