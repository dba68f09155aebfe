#pragma once

#include "charvar/word.hpp"
#include "charvar/trace_poly.hpp"
#include "charvar/mat2.hpp"
#include "charvar/exact_linalg.hpp"
#include "charvar/sl2.hpp"
#include "charvar/pretzel.hpp"
#include "charvar/arc.hpp"
#include "charvar/locus.hpp"
