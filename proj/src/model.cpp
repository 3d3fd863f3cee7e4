#include "tem/model.hpp"

namespace tem {

void validate_state(const StateVector& x)
{
    auto temp_ok = [](double t) { return t >= 200.0 && t <= 450.0; };
    if (!temp_ok(x.T_mot()) || !temp_ok(x.T_inv()) || !temp_ok(x.T_dcdc()) || !temp_ok(x.T_b()) ||
        !temp_ok(x.T_int()) || !temp_ok(x.T_cair()))
        throw OutOfRangeError("state: temperature outside [200, 450] K");
    if (x.soc() < 0.0 || x.soc() > 1.0) throw OutOfRangeError("state: SOC outside [0, 1]");
    if (!(x.p_in() > 0.0) || !(x.p_in() < x.p_out()))
        throw OutOfRangeError("state: requires 0 < p_in < p_out");
}

} // namespace tem
