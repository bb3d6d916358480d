pub mod cauchy;
