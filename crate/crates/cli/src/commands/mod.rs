pub mod bounds;
pub mod lab;
pub mod qr;
