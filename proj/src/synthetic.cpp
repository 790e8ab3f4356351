#include "infinite/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace infinite::forecast {

std::string synthetic_weather_csv(std::size_t rows) {
  constexpr double kDay = 144.0;
  constexpr double kTau = 2.0 * std::numbers::pi;
  std::string out = "time,temp,low_temp,high_temp,dew_point,wet_bulb,hum,pressure,rain,windvel,winddir\n";
  char buf[32];
  auto put = [&](double v) {
    out += ',';
    out.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  for (std::size_t k = 0; k < rows; ++k) {
    const double t = static_cast<double>(k);
    const double day = std::sin(kTau * t / kDay);
    const double temp = 20.0 + 5.0 * day;
    out += std::to_string(k * 10);
    put(temp);
    put(temp - 0.5);
    put(temp + 0.5);
    put(12.0 + 2.0 * std::sin(kTau * t / kDay + 1.0));
    put(16.0 + 3.0 * std::sin(kTau * t / kDay + 0.5));
    put(60.0 - 15.0 * day);
    put(1013.0 + 3.0 * std::sin(kTau * t / (3.0 * kDay)));
    put(2.0 + std::sin(kTau * t / (2.0 * kDay)));
    put(5.0 + 3.0 * std::sin(kTau * t / (kDay / 2.0) + 0.5));
    put(std::fmod(360.0 + 180.0 + 90.0 * day, 360.0));
    out += '\n';
  }
  return out;
}

}  // namespace infinite::forecast
