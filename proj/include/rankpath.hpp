#pragma once

#include "rankpath/numkernel.hpp"
#include "rankpath/variety.hpp"
#include "rankpath/pathbuilder.hpp"
#include "rankpath/combinators.hpp"
#include "rankpath/geooracle.hpp"
#include "rankpath/fmap.hpp"
#include "rankpath/io.hpp"
#include "rankpath/harness.hpp"
