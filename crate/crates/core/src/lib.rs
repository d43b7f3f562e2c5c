#![no_std]
extern crate alloc;

pub mod btree;
pub mod chambers;
pub mod coxeter;
pub mod localfield;
pub mod moufang;
pub mod projline;
