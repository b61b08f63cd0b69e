#pragma once

#include "brwlab/errors.hpp"
#include "brwlab/site.hpp"
#include "brwlab/laws.hpp"
#include "brwlab/model.hpp"
#include "brwlab/domain.hpp"
#include "brwlab/graph.hpp"
#include "brwlab/projection.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/spectral.hpp"
#include "brwlab/montecarlo.hpp"
#include "brwlab/gallery.hpp"
#include "brwlab/checks.hpp"
#include "brwlab/io.hpp"
