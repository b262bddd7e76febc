package main

import "fmt"

type Server struct {
    name string
}

func (s *Server) Greet(who string) string {
    msg := fmt.Sprintf("hi %s", who)
    return msg
}

func main() {
    fmt.Println("x")
}
