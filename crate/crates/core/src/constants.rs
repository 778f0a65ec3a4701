//! Physical constants and Cs defaults.

/// Standard gravity (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// ¹³³Cs hyperfine clock frequency (Hz), the SI definition of the second.
pub const CS_CLOCK_FREQUENCY: f64 = 9_192_631_770.0;

/// ¹³³Cs atomic mass (kg).
pub const CS_MASS: f64 = 2.206_95e-25;

/// First zero of J₀′ (equivalently of J₁), the radial eigenvalue of TE₀₁ modes.
pub const BESSEL_J0_PRIME_ZERO: f64 = 3.831_705_970_2;
