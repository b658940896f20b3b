#include "rshom/field.hpp"
