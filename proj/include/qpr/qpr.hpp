#pragma once

#include "qpr/certificates.hpp"
#include "qpr/frequency.hpp"
#include "qpr/jordan.hpp"
#include "qpr/matrixutil.hpp"
#include "qpr/reduction.hpp"
#include "qpr/resonance.hpp"
#include "qpr/spectral.hpp"
#include "qpr/trigpoly.hpp"
