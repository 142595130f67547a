#include "flip/engine/simulation.hpp"
