import os


def helper(value):
    # a comment
    text = "def not_a_func():"
    return value + len(text)


class Runner:
    def run(self, times):
        total = 0
        for _ in range(times):
            total += self.step()
        return total

    def step(self):
        return 1


def main():
    print(helper(3))
