// Boost 1.74's pchip calls isnan unqualified; make std::isnan visible first.
#pragma once

#include <cmath>

using std::isnan;

#include <boost/math/interpolators/pchip.hpp>
