#include "rshom/grid.hpp"
