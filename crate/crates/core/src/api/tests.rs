use super::*;
use crate::ir::{alloc_scan, eval, print_program, scope_check, summarize, type_check, Datum};
use crate::staged::*;
use crate::stream::ZipCase;

fn run(p: &Program, inputs: &[Datum]) -> Datum {
    assert_eq!(scope_check(p), Ok(()), "{}", print_program(p));
    assert_eq!(type_check(p), Ok(()), "{}", print_program(p));
    eval(p, inputs).unwrap().0
}

fn arr(xs: &[i64]) -> Datum {
    Datum::Arr(xs.to_vec())
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

#[test]
fn sum_of_squares() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).map(|x| mul(x, x)).sum();
    assert_eq!(run(&p, &[arr(&[0, 1, 2, 3, 4])]), Datum::Int(30));
    assert_eq!(run(&p, &[arr(&[])]), Datum::Int(0));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles, sh.ifs), (1, 0, 0));
}

#[test]
fn sum_of_squares_text() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).map(|x| mul(x, x)).sum();
    let want = "
        program(arr_1: int[]) {
          var s_2 := 0;
          let arr_3: int[] = arr_1;
          for i_4 = 0 to len(arr_3)-1 {
            let el_5: int = arr_3[i_4];
            let t_6: int = el_5*el_5;
            s_2 := !s_2+t_6;
          }
          return s_2;
        }";
    assert_eq!(squash(&print_program(&p)), squash(want));
}

#[test]
fn filter_even() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).filter(|x| eq(&mod_(x, &lit(2)), &lit(0))).sum();
    assert_eq!(run(&p, &[arr(&[1, 2, 3, 4])]), Datum::Int(6));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles, sh.ifs), (1, 0, 1));
}

#[test]
fn cartesian_product() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let s2 = s.clone();
    let p = s
        .of_arr(a1)
        .flat_map(move |x| {
            let x = x.clone();
            s2.of_arr(a2.clone()).map(move |y| mul(&x, y))
        })
        .sum();
    assert_eq!(run(&p, &[arr(&[1, 2]), arr(&[3, 3])]), Datum::Int(18));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles, sh.max_loop_depth), (2, 0, 2));
}

#[test]
fn take_of_array_bounds_the_for() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).take(lit(2)).sum();
    assert_eq!(run(&p, &[arr(&[5, 6, 7])]), Datum::Int(11));
    assert_eq!(run(&p, &[arr(&[5])]), Datum::Int(5));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles, sh.cells), (1, 0, 1));
    assert!(squash(&print_program(&p)).contains("min(2-1,len(arr_3)-1)"));
}

#[test]
fn take_negative_is_empty() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).take(lit(-4)).sum();
    assert_eq!(run(&p, &[arr(&[5, 6, 7])]), Datum::Int(0));
}

#[test]
fn iota_take() {
    let s = Session::new();
    let p = s.iota(lit(5)).take(lit(3)).sum();
    assert_eq!(run(&p, &[]), Datum::Int(18));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles), (0, 1));
}

#[test]
fn take_after_filter_on_nested() {
    let s = Session::new();
    let a = s.arr_param("a");
    let s2 = s.clone();
    let p = s
        .of_arr(a.clone())
        .flat_map(move |x| {
            let x = x.clone();
            s2.of_arr(a.clone()).map(move |y| add(&x, y))
        })
        .filter(|v| gt(v, &lit(2)))
        .take(lit(3))
        .sum();
    // pairs in order: 2,3,4,3,4,5,... keep >2: 3,4,3 -> 10
    assert_eq!(run(&p, &[arr(&[1, 2, 3])]), Datum::Int(10));
}

#[test]
fn dot_product_is_single_for() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let p = s.of_arr(a1).zip_with(s.of_arr(a2), mul).sum();
    assert_eq!(run(&p, &[arr(&[1, 2, 3]), arr(&[4, 5, 6])]), Datum::Int(32));
    assert_eq!(run(&p, &[arr(&[1, 2, 3]), arr(&[4])]), Datum::Int(4));
    let sh = summarize(&p);
    assert_eq!((sh.fors, sh.whiles, sh.max_loop_depth), (1, 0, 1));
    assert_eq!(s.zip_trace(), vec![ZipCase::LinearLinear]);
}

#[test]
fn zip_linear_with_nested() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let s2 = s.clone();
    let nested = s.of_arr(a1.clone()).flat_map(move |x| {
        let x = x.clone();
        s2.of_arr(a2.clone()).map(move |y| mul(&x, y))
    });
    let p = s.iota(lit(1)).zip_with(nested, mul).sum();
    // nested: 1*3,1*4,2*3,2*4 = 3,4,6,8 ; weights 1..4 -> 3+8+18+32
    assert_eq!(run(&p, &[arr(&[1, 2]), arr(&[3, 4])]), Datum::Int(61));
    assert_eq!(s.zip_trace(), vec![ZipCase::LinearNested]);
    let rep = alloc_scan(&p);
    assert_eq!(rep.loop_allocs_nonuser, 0, "{}", print_program(&p));
}

#[test]
fn zip_nested_with_linear_swaps_back() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let s2 = s.clone();
    let nested = s.of_arr(a1.clone()).flat_map(move |x| {
        let x = x.clone();
        s2.of_arr(a2.clone()).map(move |y| sub(&x, y))
    });
    let p = nested.zip_with(s.iota(lit(10)), sub).sum();
    // nested: 1-3,1-4,2-3,2-4 = -2,-3,-1,-2 ; minus 10..13
    assert_eq!(run(&p, &[arr(&[1, 2]), arr(&[3, 4])]), Datum::Int(-8 - 46));
    assert_eq!(s.zip_trace(), vec![ZipCase::NestedLinear]);
}

#[test]
fn zip_nested_nested_reifies_and_agrees() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let (s2, s3) = (s.clone(), s.clone());
    let (b1, b2) = (a1.clone(), a2.clone());
    let left = s.of_arr(a1).flat_map(move |x| {
        let x = x.clone();
        s2.of_arr(a2.clone()).map(move |y| add(y, &x))
    });
    let right = s.of_arr(b2).flat_map(move |x| {
        let x = x.clone();
        s3.of_arr(b1.clone()).map(move |y| add(y, &x))
    });
    let p = left.zip_with(right, add).sum();
    let xs = [1, 2, 3];
    let ys = [10, 20];
    let l: Vec<i64> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| y + x))
        .collect();
    let r: Vec<i64> = ys
        .iter()
        .flat_map(|x| xs.iter().map(move |y| y + x))
        .collect();
    let want: i64 = l.iter().zip(&r).map(|(a, b)| a + b).sum();
    assert_eq!(run(&p, &[arr(&xs), arr(&ys)]), Datum::Int(want));
    assert_eq!(s.zip_trace(), vec![ZipCase::NestedNested]);
    assert!(alloc_scan(&p).loop_allocs_nonuser > 0);
}

#[test]
fn zip_with_empty_sides() {
    let s = Session::new();
    let a1 = s.arr_param("arr1");
    let a2 = s.arr_param("arr2");
    let s2 = s.clone();
    let nested = s.of_arr(a1.clone()).flat_map(move |x| {
        let x = x.clone();
        s2.of_arr(a2.clone()).map(move |y| mul(&x, y))
    });
    let p = s.of_arr(a1.clone()).zip_with(nested, add).sum();
    assert_eq!(run(&p, &[arr(&[]), arr(&[3, 4])]), Datum::Int(0));
    assert_eq!(run(&p, &[arr(&[2]), arr(&[])]), Datum::Int(0));
    assert_eq!(run(&p, &[arr(&[2]), arr(&[3, 4])]), Datum::Int(2 + 6));
}

#[test]
fn unfold_countdown() {
    let s = Session::new();
    let n = s.int_param("n");
    let p = s
        .unfold(|k: &Code<i64>| some_pair_e(k, &sub(k, &lit(1))), n)
        .take(lit(4))
        .sum();
    assert_eq!(run(&p, &[Datum::Int(10)]), Datum::Int(10 + 9 + 8 + 7));
}

#[test]
fn fold_cons_builds_reversed_list() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s
        .of_arr(a)
        .map(|x| add(x, &lit(1)))
        .fold(|z, x| cons_e(x, z), nil_e::<i64>());
    assert_eq!(
        run(&p, &[arr(&[1, 2, 3])]),
        Datum::List(vec![Datum::Int(4), Datum::Int(3), Datum::Int(2)])
    );
}

#[test]
fn pair_elements_through_zip() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s
        .of_arr(a.clone())
        .zip_with(s.iota(lit(0)), pair_e)
        .map(|p: &Code<(i64, i64)>| p.clone())
        .fold(
            |z: &Code<List<(i64, i64)>>, x| cons_e(x, z),
            nil_e::<(i64, i64)>(),
        );
    assert_eq!(
        run(&p, &[arr(&[7, 8])]),
        Datum::List(vec![
            Datum::pair(Datum::Int(8), Datum::Int(1)),
            Datum::pair(Datum::Int(7), Datum::Int(0)),
        ])
    );
}

#[test]
fn sessions_name_deterministically() {
    let build = || {
        let s = Session::new();
        let a = s.arr_param("arr");
        s.of_arr(a)
            .filter(|x| gt(x, &lit(0)))
            .map(|x| add(x, x))
            .sum()
    };
    assert_eq!(print_program(&build()), print_program(&build()));
}

#[test]
#[should_panic(expected = "different sessions")]
fn cross_session_zip_panics() {
    let s = Session::new();
    let t = Session::new();
    let a = s.arr_param("a");
    let b = t.arr_param("b");
    let _ = s.of_arr(a).zip_with(t.of_arr(b), add);
}

#[test]
fn long_result_lists_do_not_overflow() {
    let s = Session::new();
    let a = s.arr_param("arr");
    let p = s.of_arr(a).fold(|z, x| cons_e(x, z), nil_e::<i64>());
    let xs: Vec<i64> = (0..200_000).collect();
    let Datum::List(items) = run(&p, &[arr(&xs)]) else {
        panic!()
    };
    assert_eq!(items.len(), 200_000);
    assert_eq!(items[0], Datum::Int(199_999));
}
