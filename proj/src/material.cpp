#include "membrane/material.hpp"

namespace membrane {

template struct Material<double>;
template Material<double> build_material<double>(double, double);
template Material<double> build_michell<double>(double);

} // namespace membrane
