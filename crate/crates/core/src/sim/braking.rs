//! Discrete stopping distances for the velocity-first Euler update.
//!
//! A vehicle braking at `decel` from speed `v` covers
//! `S(v) = dt * sum_{k>=1} max(v - k*decel*dt, 0)` before it stops. The
//! safe-speed bound keeps `gap' + S(v_leader') >= margin + S(v')` after every
//! step, which lets a follower always stop behind a leader that brakes at the
//! same bounded rate.

/// Exact discrete stopping distance `S(v)`.
pub fn braking_distance(v: f64, decel: f64, dt: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let dv = decel * dt;
    // Number of strictly positive speeds after the first braking step.
    let n = ((v / dv).ceil() - 1.0).max(0.0);
    dt * (n * v - dv * n * (n + 1.0) / 2.0)
}

/// Largest `v >= 0` with `v * dt + S(v) <= budget`. Returns 0 for a negative
/// budget.
pub fn max_safe_speed(budget: f64, decel: f64, dt: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let dv = decel * dt;
    // On [n*dv, (n+1)*dv] the left side is dt*((n+1)*v - dv*n*(n+1)/2).
    let mut n = 0.0_f64;
    loop {
        let v_hi = (n + 1.0) * dv;
        let f_hi = dt * ((n + 1.0) * v_hi - dv * n * (n + 1.0) / 2.0);
        if budget <= f_hi {
            return (budget / dt + dv * n * (n + 1.0) / 2.0) / (n + 1.0);
        }
        n += 1.0;
    }
}

/// Largest `v >= 0` with `S(v) <= distance`.
pub fn max_speed_for_braking_distance(distance: f64, decel: f64, dt: f64) -> f64 {
    if distance < 0.0 {
        return 0.0;
    }
    let dv = decel * dt;
    // On [(n)*dv, (n+1)*dv], S(v) = dt*(n*v - dv*n*(n+1)/2).
    let mut n = 1.0_f64;
    loop {
        let v_hi = (n + 1.0) * dv;
        let s_hi = dt * (n * v_hi - dv * n * (n + 1.0) / 2.0);
        if distance <= s_hi {
            return (distance / dt + dv * n * (n + 1.0) / 2.0) / n;
        }
        n += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_stop(v: f64, decel: f64, dt: f64) -> f64 {
        let mut v = v;
        let mut x = 0.0;
        while v > 0.0 {
            v = (v - decel * dt).max(0.0);
            x += v * dt;
        }
        x
    }

    #[test]
    fn known_values() {
        assert_eq!(braking_distance(0.0, 3.0, 0.5), 0.0);
        assert_eq!(braking_distance(1.5, 3.0, 0.5), 0.0);
        // 13.5 + 12 + ... + 1.5 = 67.5, times dt.
        assert!((braking_distance(15.0, 3.0, 0.5) - 33.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_brute_force(v in 0.0f64..40.0) {
            let s = braking_distance(v, 3.0, 0.5);
            let b = brute_force_stop(v, 3.0, 0.5);
            prop_assert!((s - b).abs() < 1e-9, "v={} s={} brute={}", v, s, b);
        }

        #[test]
        fn safe_speed_inverts_budget(budget in 0.0f64..400.0) {
            let v = max_safe_speed(budget, 3.0, 0.5);
            let f = v * 0.5 + braking_distance(v, 3.0, 0.5);
            prop_assert!((f - budget).abs() < 1e-9);
        }

        #[test]
        fn stopping_speed_inverts_distance(d in 0.0f64..300.0) {
            let v = max_speed_for_braking_distance(d, 3.0, 0.5);
            prop_assert!(v >= 1.5 - 1e-12);
            prop_assert!(braking_distance(v, 3.0, 0.5) <= d + 1e-9);
            prop_assert!(braking_distance(v + 1e-6, 3.0, 0.5) > d - 1e-9);
        }
    }
}
