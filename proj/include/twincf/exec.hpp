#pragma once

namespace twincf {

/// Selects the serial reference loop or the OpenMP kernel. Both produce
/// bit-identical results: parallel loops only write per-element slots and
/// every floating-point reduction runs serially afterwards.
enum class Exec { serial, parallel };

}  // namespace twincf
