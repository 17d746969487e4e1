#include "appforge/util/errors.hpp"
