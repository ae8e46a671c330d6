# Introductory programs for the sandbox differential suite.
# Each entry is (name, source). record.py runs them with python3.

PROGRAMS = [
("while_counter", """i = 0
while i < 3:
    print(i)
    i += 1
"""),
("remove_missing", """nums = [1, 2, 3]
nums.remove(4)
"""),
("remove_present", """nums = [1, 2, 3, 4]
nums.remove(3)
print(nums)
"""),
("pop_with_string", """pets = ['Leprechaun', 'cat', 'dog']
pets.pop('Leprechaun')
"""),
("pop_index", """pets = ['Leprechaun', 'cat', 'dog']
last = pets.pop()
first = pets.pop(0)
print(first, last, pets)
"""),
("pop_out_of_range", """a = [1]
a.pop(5)
"""),
("for_range_sum", """total = 0
for n in range(1, 11):
    total += n
print("total:", total)
"""),
("range_step_negative", """for k in range(10, 0, -3):
    print(k, end=" ")
print()
"""),
("nested_loops", """for i in range(3):
    for j in range(i):
        print(i, j)
"""),
("break_continue", """found = None
for x in [4, 7, 9, 12, 15]:
    if x % 2 == 0:
        continue
    if x > 8:
        found = x
        break
print(found)
"""),
("while_stop_message", """count = 0
while count < 5:
    count += 1
    if count == 3:
        print('stop')
    print(count)
"""),
("if_elif_else", """def grade(score):
    if score >= 90:
        return 'A'
    elif score >= 80:
        return 'B'
    elif score >= 70:
        return 'C'
    else:
        return 'F'

results = []
for s in [95, 85, 72, 10]:
    results.append(grade(s))
print(results)
"""),
("string_methods", """s = "  Hello, World  "
t = s.strip()
print(t.upper(), t.lower())
print(t.replace("World", "There"))
print(t.find("o"), t.find("z"))
words = t.split(", ")
print(words, "-".join(words))
"""),
("split_whitespace", """line = "  the quick   brown fox "
parts = line.split()
print(len(parts), parts)
print(line.split(" "))
"""),
("list_methods", """a = [3, 1, 2]
a.append(5)
a.insert(0, 9)
a.extend([7, 7])
print(a, a.count(7), a.index(2))
a.sort()
print(a)
a.reverse()
print(a)
"""),
("list_index_missing", """a = ['x', 'y']
a.index('z')
"""),
("slicing", """s = 'abcdefgh'
print(s[1:4], s[:3], s[5:], s[::2], s[::-1], s[-3:])
a = list(range(10))
print(a[2:8:2], a[-1], a[:-7])
"""),
("index_error", """a = [1, 2, 3]
i = 0
while True:
    print(a[i])
    i += 1
"""),
("name_error", """x = 10
print(x + y)
"""),
("type_error_concat", """age = 20
print("Age: " + age)
"""),
("str_conversion", """age = 20
msg = "Age: " + str(age)
print(msg)
"""),
("zero_division", """values = [4, 2, 0]
for v in values:
    print(12 // v)
"""),
("float_division", """print(7 / 2, 7 // 2, -7 // 2, 7 % 3, -7 % 3, 2 ** 10, 2 ** -1)
print(0.1 + 0.2, 1 / 3, 10 / 5)
"""),
("int_float_conversions", """print(int("42") + 1, float("3.5"), int(3.99), int(-3.99))
print(float(2), str(1.0), bool(0), bool("x"), bool([]))
"""),
("int_parse_error", """n = int("forty")
"""),
("functions_basic", """def add(a, b):
    return a + b

def greet(name):
    print("Hello, " + name + "!")

r = add(2, 3)
greet("Ada")
print(r, add("x", "y"))
"""),
("function_missing_arg", """def area(w, h):
    return w * h

print(area(3))
"""),
("recursion_factorial", """def fact(n):
    if n <= 1:
        return 1
    return n * fact(n - 1)

print(fact(10), fact(25))
"""),
("fibonacci_loop", """a, b = 0, 1
seq = []
while len(seq) < 10:
    seq.append(a)
    a, b = b, a + b
print(seq)
"""),
("min_max_sum", """data = [4, -2, 9, 0, 3]
print(min(data), max(data), sum(data), abs(-7), abs(-2.5))
print(max(3, 8, 1), min("pear", "apple"))
"""),
("sorted_builtin", """names = ["bob", "Alice", "carol"]
print(sorted(names), sorted(names, reverse=True), names)
print(sorted([3.5, 1, 2]))
"""),
("enumerate_loop", """for i, ch in enumerate("abc"):
    print(i, ch)
for i, v in enumerate([10, 20], 1):
    print(i, v)
"""),
("len_and_in", """word = "banana"
print(len(word), "nan" in word, "x" not in word)
print(3 in [1, 2, 3], 5 in range(10))
"""),
("dict_counting", """counts = {}
for ch in "mississippi":
    counts[ch] = counts.get(ch, 0) + 1
print(counts)
print(sorted(counts.keys()), counts['s'])
"""),
("dict_key_error", """stock = {'apple': 3}
print(stock['pear'])
"""),
("dict_items_loop", """ages = {'ann': 31, 'ben': 27}
for name, age in ages.items():
    print(name, age)
print(list(ages.values()))
"""),
("tuple_unpack", """point = (3, 4)
x, y = point
print(x * x + y * y)
a, b = [1, 2, 3]
"""),
("string_iteration", """vowels = 0
for c in "Programming":
    if c in "aeiou":
        vowels += 1
print("vowels", vowels)
"""),
("string_index_error", """s = "hey"
print(s[3])
"""),
("string_immutable", """s = "hey"
s[0] = "H"
"""),
("list_aliasing", """a = [1, 2]
b = a
b.append(3)
c = a[:]
c.append(4)
print(a, b, c, a is b, a == c)
"""),
("list_of_lists", """grid = []
for r in range(3):
    grid.append([])
    for c in range(3):
        grid[r].append(r * 3 + c)
print(grid, grid[1][2])
"""),
("accumulate_strings", """out = ""
for i in range(5):
    out += str(i)
print(out, len(out))
"""),
("print_sep_end", """print(1, 2, 3, sep=", ")
print("a", end="")
print("b")
print()
print("x", "y", sep="")
"""),
("comparison_chain", """x = 5
print(1 < x < 10, 1 < x > 7, x == 5 == 5.0)
print("apple" < "banana", [1, 2] < [1, 3])
"""),
("boolean_logic", """a = 0
b = "yes"
print(a or b, a and b, not a, not b)
print(None is None, True + True)
"""),
("global_function_reads", """rate = 3
def scale(v):
    return v * rate
print(scale(4))
"""),
("unbound_local", """total = 0
def bump():
    total += 1
bump()
"""),
("local_shadowing", """x = 'global'
def show():
    x = 'local'
    return x
print(show(), x)
"""),
("none_return", """def nothing():
    pass
r = nothing()
print(r)
lst = [3, 1]
res = lst.sort()
print(res, lst)
"""),
("nested_function_calls", """def square(n):
    return n * n
def sum_squares(items):
    total = 0
    for i in items:
        total += square(i)
    return total
print(sum_squares([1, 2, 3, 4]))
"""),
("while_with_else_branch", """n = 27
steps = 0
while n != 1:
    if n % 2 == 0:
        n = n // 2
    else:
        n = 3 * n + 1
    steps += 1
print(steps)
"""),
("type_error_sort_mixed", """items = [3, "two", 1]
items.sort()
"""),
("int_plus_none", """def f():
    print("no return")
value = f() + 1
"""),
("float_formatting", """print(1e16, 1e-5, 123456789.0, 0.5, -0.0, 2.5e-3, 1e22 / 7)
print(float("inf"), -float("inf"))
"""),
("big_integers", """print(2 ** 100, -2 ** 63, 10 ** 20 // 7, (-10) ** 3)
"""),
("join_non_string", """nums = [1, 2, 3]
print(", ".join(nums))
"""),
("replace_and_count", """s = "a-b-c-d"
print(s.replace("-", "+", 2), s.count("-"), s.split("-", 1))
"""),
("strip_chars", """s = "xxhixx"
print(s.strip("x"), "  pad ".strip())
"""),
("list_multiply", """row = [0] * 4
row[2] = 7
print(row, "ab" * 3, [1, 2] + [3])
"""),
("negative_indices", """a = [10, 20, 30, 40]
print(a[-1], a[-2], a[-4])
a[-1] = 99
print(a)
"""),
("list_assignment_out_of_range", """a = [1, 2]
a[2] = 3
"""),
("insert_positions", """a = [1, 2, 3]
a.insert(100, 'end')
a.insert(-100, 'start')
a.insert(-1, 'mid')
print(a)
"""),
("count_down_loop", """n = 5
while n > 0:
    print(n, end=" ")
    n -= 1
print("liftoff")
"""),
("sum_floats", """prices = [19.99, 5.01, 0.5]
print(sum(prices), sum([1, 2], 10))
"""),
("attribute_error", """x = 5
x.append(1)
"""),
("call_non_callable", """n = 3
n(2)
"""),
("range_len_and_list", """r = range(2, 20, 5)
print(len(r), list(r), r[1])
"""),
("nested_data", """students = [("ann", [90, 85]), ("ben", [70, 65])]
for name, scores in students:
    avg = sum(scores) / len(scores)
    print(name, avg)
"""),
]
