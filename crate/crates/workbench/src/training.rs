use conceptkd_core::distillation::{train_student, StudentEnsemble, TeacherLogits, TrainConfig};
use conceptkd_core::Matrix;
use rayon::prelude::*;

/// Trains one student per class on a rayon pool. Each class is trained
/// independently and deterministically, so the result equals the sequential
/// `train_ensemble`.
pub fn train_ensemble_parallel(
    presence: &Matrix,
    teacher: &TeacherLogits,
    config: &TrainConfig,
) -> conceptkd_core::Result<StudentEnsemble> {
    let students = teacher
        .class_names
        .par_iter()
        .enumerate()
        .map(|(j, name)| {
            train_student(presence, &teacher.values.column(j), config, name).map_err(|e| e.in_class(name))
        })
        .collect::<conceptkd_core::Result<Vec<_>>>()?;
    StudentEnsemble::new(students)
}
