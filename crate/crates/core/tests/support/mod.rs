pub mod scalar_forward;
