mod support;

use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn spectra_are_even_and_nonnegative(n in noise_model(), w in frequency()) {
        spectra_even_nonnegative(&n, w)?;
    }

    #[test]
    fn output_spectrum_is_hermitian_and_real(n in noise_model(), w in frequency(), adiabatic in any::<bool>()) {
        output_hermitian_real(&n, w, adiabatic)?;
    }

    #[test]
    fn field_block_is_toeplitz(n in noise_model(), bins in 2usize..10, dt in 2e-4..2e-3f64) {
        vv_block_toeplitz(&n, bins, dt)?;
    }

    #[test]
    fn partial_transpose_is_an_involution(s in symmetric_set()) {
        transpose_involution(&s)?;
    }

    #[test]
    fn ppt_and_symplectic_boundaries_agree(s in gaussian_state()) {
        boundary_consistent(&s)?;
    }

    #[test]
    fn parallel_sweep_equals_serial((structural, r, workers) in ratios()) {
        parallel_matches_serial(structural, &r, workers)?;
    }
}
