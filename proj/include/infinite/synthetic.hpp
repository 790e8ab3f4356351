#pragma once

#include <cstddef>
#include <string>

namespace infinite::forecast {

/// Noiseless weather-like CSV at a 10-minute cadence (144 rows per day):
/// temperatures, humidity, pressure, rainfall, wind speed and direction, all
/// smooth sinusoids offset away from zero. Used as a convergence benchmark.
std::string synthetic_weather_csv(std::size_t rows);

}  // namespace infinite::forecast
