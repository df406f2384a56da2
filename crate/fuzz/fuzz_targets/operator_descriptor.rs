#![no_main]

use kzsparse::sensing::OperatorDescriptor;
use kzsparse::SignalVector;
use libfuzzer_sys::fuzz_target;

// Dimension caps keep a single input cheap; anything larger is rejected
// before allocation.
const MAX_ELEMS: usize = 1 << 16;
const MAX_COLS: usize = 1 << 12;

fuzz_target!(|data: &[u8]| {
    let text = match std::str::from_utf8(data) {
        Ok(t) => t,
        Err(_) => return,
    };
    let descriptor = match OperatorDescriptor::from_json(text) {
        Ok(d) => d,
        Err(_) => return,
    };
    if descriptor.cols() > MAX_COLS
        || descriptor.rows().saturating_mul(descriptor.cols()) > MAX_ELEMS
    {
        return;
    }
    let op = match descriptor.build() {
        Ok(op) => op,
        Err(_) => return,
    };

    // Building twice from the same descriptor is bit-identical.
    let again = descriptor.build().expect("second build of a valid descriptor");
    assert_eq!(op, again);

    // The replay descriptor reproduces the same entries.
    let replayed = op
        .descriptor()
        .build()
        .expect("replay descriptor must build");
    assert_eq!(replayed.rows(), op.rows());
    assert_eq!(replayed.cols(), op.cols());
    assert_eq!(replayed.to_dense_rows(), op.to_dense_rows());

    // Forward and adjoint products are well defined on valid operators.
    let x = SignalVector::new(vec![1.0; op.cols()]);
    let y = op.apply(&x).expect("apply on matching dimensions");
    let _ = op.apply_adjoint(&y).expect("adjoint on matching dimensions");
});
