use wnuc::Matrix;
use wnuc_py::convert::{from_matrix, to_matrix, to_vector};

#[test]
fn rows_round_trip() {
    let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
    let m = to_matrix(&rows).unwrap();
    assert_eq!(m, Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    assert_eq!(from_matrix(&m), rows);
    assert_eq!(to_vector(&[1.0, 2.0]).len(), 2);
}

#[test]
fn ragged_rows_are_rejected() {
    pyo3::prepare_freethreaded_python();
    assert!(to_matrix(&[vec![1.0, 2.0], vec![3.0]]).is_err());
}
